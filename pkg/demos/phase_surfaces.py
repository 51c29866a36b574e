"""Ground-state displacement and quadrature widths across the (g1, g2) plane."""
import numpy as np

from tricrit.reproduce import phase_surfaces


def main():
    rec = phase_surfaces(n=41, lim=2.0)
    s1, s2 = rec.column("s1"), rec.column("s2")
    phase = rec.column("phase")
    alpha = rec.column("abs_alpha")
    for lab in sorted(set(phase)):
        m = phase == lab
        print(f"{lab:12s} {m.sum():5d} points, max |alpha| = {np.nanmax(alpha[m]):.4g}")
    row = np.isclose(s2, 0.5)
    print("|alpha| along g2 = 0.5 gc:")
    for a, v in zip(s1[row], alpha[row]):
        print(f"  g1/gc = {a:+.2f}  |alpha| = {v:.4g}")


if __name__ == "__main__":
    main()
