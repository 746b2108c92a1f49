"""Velocity Hessian ranks: 5 for a phenomenological family, 4 for fundamental, 2 for the light-cone particle."""
import numpy as np

from rotators import GaugeProfile, RotatorSpec, build_initial_state, eom, hessian_rank
from rotators.sphere import SphereModelSpec, sphere_hessian

np.set_printoptions(precision=3, linewidth=120)

for family in ("quadratic", [1.0, 0.5, 0.7, 0.2], "fundamental+", "fundamental-"):
    spec = RotatorSpec(1.0, 1.0, family)
    if spec.is_fundamental:
        s0, prof = build_initial_state(spec), GaugeProfile.constant(float(spec.sign))
    else:
        s0, prof = build_initial_state(spec, q=0.5), None
    v = eom(spec, s0, prof)
    for method in ("jet", "fd"):
        rep = hessian_rank(spec, v.x, s0.k, v.k, method=method)
        print(f"{spec.family.name:22s} {method:3s} rank {rep.rank} (raw {rep.raw_rank}) gap {rep.gap:.2e}")
    print("   singular values", rep.singular_values)

sp = SphereModelSpec.default()
h = sphere_hessian(sp.w, sp.q0, sp.qdot0)
print(f"light-cone particle    rank {h.rank}, |Hq|/|H| = {h.residual_q / h.norm:.1e}, |Hw|/|H| = {h.residual_w / h.norm:.1e}")
