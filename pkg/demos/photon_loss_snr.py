"""Photon-number SNR along a short sweep with photon loss on the effective bosonic mode."""
import numpy as np

from tricrit.evolve import LindbladConfig, LindbladMode, dissipative_snr
from tricrit.fockspace import FockBasis, eig_hermitian
from tricrit.models import AqrmParams, build_np_hamiltonian
from tricrit.schedules import RampSpec, StraightLine, build_schedule


def main():
    base = AqrmParams(2.5e5, 0.25)
    sched = build_schedule(StraightLine(2.0), RampSpec(1e-2), base, s_end=0.02)
    basis = FockBasis(40)

    def builder(p):
        return build_np_hamiltonian(p, basis)

    def rho0_at(w):
        _, st = eig_hermitian(builder(sched.params_at(0.0, w)))
        return st[0].density()

    times = np.linspace(0.0, sched.T, 11)
    for kp in (0.0, 0.01 * base.omega, 0.1 * base.omega):
        tr = dissipative_snr(builder, sched, LindbladConfig(kp, 0.0, LindbladMode.BosonicOnly), rho0_at,
                             base.omega, sample_times=times)
        print(f"kappa_p = {kp:.4g}: S(t) = " + " ".join(f"{x:.3g}" for x in tr.column("snr")))


if __name__ == "__main__":
    main()
