"""Straight-line sweep toward the triple point: QFI growth with time and the fitted rates."""
import math

from tricrit.presets import figure_config
from tricrit.schedules import predict
from tricrit.sweep import run_cell


def main():
    cfg = figure_config("fig2-k2")
    cell = run_cell(cfg)
    pred = predict(cfg.path_spec(), cfg.ramp_spec(), cell.schedule.base)
    T = cell.data.column("T")
    F = cell.data.column("F_analytic")
    print(f"protocol time T = {cell.schedule.T:.1f}, predicted {pred.T_closed:.1f}")
    for i in range(0, len(T), 40):
        print(f"  t = {T[i]:9.1f}   F = {F[i]:.4e}")
    b = cell.fits["F_vs_T_exp"]["b"]
    aT = cell.fits["T_vs_dist"]["a"]
    print(f"fitted b = {b:.4e} (asymptote {pred.coefficients['b']:.4e})")
    print(f"fitted a_T = {aT:.1f} (asymptote {pred.coefficients['a_T']:.1f})")
    print(f"b * a_T = {b * aT:.4f}")
    print(f"F at the end vs Heisenberg T^2: {F[-1]:.3e} vs {T[-1] ** 2:.3e} (ratio {F[-1] / T[-1] ** 2:.3g})")
    print(f"predicted F(T) = {pred.F_final:.3e}, ln ratio {math.log(F[-1] / pred.F_final):.3f}")


if __name__ == "__main__":
    main()
