"""How Algorithm 1 reacts to its compatibility reward on one generated instance.

    python demos/weight_sweep.py [schools stops seed]
"""
import sys

from schoolbus import generate_instance
from schoolbus.harness import cmd_sweep


def main(schools=6, stops=60, seed=0):
    inst = generate_instance(int(schools), int(stops), int(seed))
    print(f"{'alpha_c_oa':>10} {'buses':>5} {'trips':>5} {'tvt min':>8}")
    for row in cmd_sweep(inst):
        print(f"{row['alpha_c_oa']:>10} {row['nob']!s:>5} {row['not']!s:>5} "
              f"{row['tvt_minutes']!s:>8} {row['detail']}")


if __name__ == "__main__":
    main(*sys.argv[1:])
