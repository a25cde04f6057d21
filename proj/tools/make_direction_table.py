#!/usr/bin/env python3
"""Regenerate data/sobol_directions.txt from the Joe-Kuo D(6) table.

The initial direction numbers are the new-joe-kuo-6.21201 set of
S. Joe and F. Y. Kuo ("Constructing Sobol sequences with better
two-dimensional projections", SIAM J. Sci. Comput. 30, 2635-2654, 2008),
taken here from the copy redistributed with SciPy (BSD-3-Clause).

Output format, one dimension per line:

    d  s  a  m_1 ... m_s

where d is the 1-based dimension index, s the degree of the primitive
polynomial, a the integer encoding its interior coefficients, and m_i the
initial direction integers. Dimension 1 (v_k = 2^-(k+1)) is implicit and
not listed. Lines starting with '#' are comments.
"""

import os
import sys

import numpy as np
import scipy.stats._sobol as _sobol

MAX_DIM = 1100


def main() -> None:
    data = np.load(
        os.path.join(os.path.dirname(_sobol.__file__), "_sobol_direction_numbers.npz")
    )
    poly = data["poly"]
    vinit = data["vinit"]

    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out_path = os.path.join(root, "data", "sobol_directions.txt")
    with open(out_path, "w") as out:
        out.write("# Sobol direction numbers, dimensions 2..%d.\n" % MAX_DIM)
        out.write("# Source: Joe-Kuo D(6) table (new-joe-kuo-6.21201), as\n")
        out.write("# redistributed with SciPy. See tools/make_direction_table.py.\n")
        out.write("# Format: d s a m_1 ... m_s   (dimension 1 is implicit)\n")
        for dim in range(2, MAX_DIM + 1):
            p = int(poly[dim - 1])
            s = p.bit_length() - 1
            a = (p - (1 << s) - 1) >> 1
            m = [str(int(x)) for x in vinit[dim - 1][:s]]
            out.write("%d %d %d %s\n" % (dim, s, a, " ".join(m)))
    sys.stderr.write("wrote %s\n" % out_path)


if __name__ == "__main__":
    main()
