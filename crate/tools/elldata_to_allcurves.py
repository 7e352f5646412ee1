#!/usr/bin/env python3
"""Convert PARI's elldata files (Cremona's tables) into allcurves lines.

    elldata_to_allcurves.py ELLDATA_DIR MAX_CONDUCTOR > allcurves.txt

ELLDATA_DIR holds the `ellK` files, e.g. from the passagemath-pari-elldata
wheel (sage_wheels/share/pari/elldata). Each elldata entry is
[label, a-invariants, generators]; rank is the number of generators and the
torsion order comes from PARI's elltors.
"""
import re
import sys
from cypari import pari

LABEL = re.compile(r"^(\d+)([a-z]+)(\d+)$")


def main():
    directory, limit = sys.argv[1], int(sys.argv[2])
    for block in range(limit // 1000 + 1):
        text = open(f"{directory}/ell{block}").read()
        for entry in pari(text):
            conductor = int(entry[0])
            if conductor > limit:
                continue
            for k in range(1, len(entry)):
                label, ainvs, gens = entry[k]
                n, cls, idx = LABEL.match(str(label)).groups()
                assert int(n) == conductor
                a = [int(x) for x in ainvs]
                torsion = int(pari.elltors(pari.ellinit(a))[0])
                print(f"{n} {cls} {idx} [{','.join(map(str, a))}] {len(gens)} {torsion}")


if __name__ == "__main__":
    main()
