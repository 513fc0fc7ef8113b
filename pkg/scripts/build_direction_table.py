"""Regenerate ``src/sobolsa/data/sobol_directions.txt``.

Rows 1-40 carry the Bratley & Fox (1988, ACM TOMS 659) primitive
polynomials and initial direction numbers. Later rows are taken from the
Joe & Kuo (2008) ``new-joe-kuo-6.21201`` table (read here from the copy
shipped inside SciPy), skipping any polynomial already used above.

Each output line is ``degree a m_1 ... m_degree`` where ``a`` encodes the
interior polynomial coefficients.
"""
import os
import sys

import numpy as np
import scipy.stats

N_DIMS = 1111

BF_POLY = [
    1, 3, 7, 11, 13, 19, 25, 37, 59, 47,
    61, 55, 41, 67, 97, 91, 109, 103, 115, 131,
    193, 137, 145, 143, 241, 157, 185, 167, 229, 171,
    213, 191, 253, 203, 211, 239, 247, 285, 369, 299,
]

BF_INIT = np.zeros((40, 8), dtype=int)
BF_INIT[0:40, 0] = 1
BF_INIT[2:40, 1] = [
    1, 3, 1, 3, 1, 3, 3, 1,
    3, 1, 3, 1, 3, 1, 1, 3, 1, 3,
    1, 3, 1, 3, 3, 1, 3, 1, 3, 1,
    3, 1, 1, 3, 1, 3, 1, 3, 1, 3,
]
BF_INIT[3:40, 2] = [
    7, 5, 1, 3, 3, 7, 5,
    5, 7, 7, 1, 3, 3, 7, 5, 1, 1,
    5, 3, 3, 1, 7, 5, 1, 3, 3, 7,
    5, 1, 1, 5, 7, 7, 5, 1, 3, 3,
]
BF_INIT[5:40, 3] = [
    1, 7, 9, 13, 11,
    1, 3, 7, 9, 5, 13, 13, 11, 3, 15,
    5, 3, 15, 7, 9, 13, 9, 1, 11, 7,
    5, 15, 1, 15, 11, 5, 3, 1, 7, 9,
]
BF_INIT[7:40, 4] = [
    9, 3, 27,
    15, 29, 21, 23, 19, 11, 25, 7, 13, 17,
    1, 25, 29, 3, 31, 11, 5, 23, 27, 19,
    21, 5, 1, 17, 13, 7, 15, 9, 31, 9,
]
BF_INIT[13:40, 5] = [
    37, 33, 7, 5, 11, 39, 63,
    27, 17, 15, 23, 29, 3, 21, 13, 31, 25,
    9, 49, 33, 19, 29, 11, 19, 27, 15, 25,
]
BF_INIT[19:40, 6] = [
    13,
    33, 115, 41, 79, 17, 29, 119, 75, 73, 105,
    7, 59, 65, 21, 3, 113, 61, 89, 45, 107,
]
BF_INIT[37:40, 7] = [7, 23, 39]


def split_poly(poly):
    degree = int(poly).bit_length() - 1
    interior = (int(poly) >> 1) & ((1 << max(degree - 1, 0)) - 1)
    return degree, interior


def main(out_path):
    jk = np.load(os.path.join(os.path.dirname(scipy.stats.__file__),
                              "_sobol_direction_numbers.npz"))
    rows = []
    for poly, init in zip(BF_POLY, BF_INIT):
        degree, a = split_poly(poly)
        rows.append([degree, a, *init[:max(degree, 1)]])
    used = set(BF_POLY)
    for poly, init in zip(jk["poly"], jk["vinit"]):
        if len(rows) >= N_DIMS:
            break
        if int(poly) in used:
            continue
        used.add(int(poly))
        degree, a = split_poly(poly)
        rows.append([degree, a, *init[:degree]])
    with open(out_path, "w") as fh:
        fh.write("# degree a m_1..m_degree; rows 1-40 Bratley-Fox, later rows Joe-Kuo\n")
        for row in rows:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    default = os.path.join(here, "..", "src", "sobolsa", "data", "sobol_directions.txt")
    main(sys.argv[1] if len(sys.argv) > 1 else default)
