"""Writes a measurement grid whose optimum is planted at T = a*sqrt(M) + b.

accuracy_c(T) = 100 * exp(-(ln T - ln(a*sqrt(M_c) + b))^2)

The fitter must recover (a, b); this script is the independent generator.
"""
import argparse
import math

M_VALUES = [64, 128, 256, 512, 768, 1024, 2048, 4096]


def temperatures(per_octave):
    return [2.0 ** (j / per_octave) for j in range(0, 9 * per_octave + 1)]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--a", type=float, default=0.7)
    p.add_argument("--b", type=float, default=3.0)
    p.add_argument("--per-octave", type=int, default=16)
    p.add_argument("--no-peak-knot", action="store_true",
                   help="omit the measurement taken exactly at the planted optimum")
    p.add_argument("--out", required=True)
    args = p.parse_args()
    with open(args.out, "w") as f:
        f.write("condition_id,dataset,model,m,csg,cn,temperature,accuracy,seed\n")
        for m in M_VALUES:
            peak = args.a * math.sqrt(m) + args.b
            temps = temperatures(args.per_octave)
            if not args.no_peak_knot:
                temps = sorted(set(temps) | {peak})
            for t in temps:
                acc = 100.0 * math.exp(-(math.log(t) - math.log(peak)) ** 2)
                f.write(f"planted-m{m},synthetic,linear,{m},,10,{t!r},{acc!r},0\n")


if __name__ == "__main__":
    main()
