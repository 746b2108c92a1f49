"""Projective particle on the light cone: only the ray of q is physical."""
import numpy as np

from rotators.sphere import SphereModelSpec, integrate_sphere, sphere_lagrangian, sphere_multiplier

sp = SphereModelSpec.default()
print(f"L = {sphere_lagrangian(sp.w, sp.q0, sp.qdot0):.3f}, Lambda = {sphere_multiplier(sp.w, sp.q0, sp.qdot0):.3f}")

a = integrate_sphere(sp, 10.0, 1e-3)
b = integrate_sphere(sp, 10.0, 1e-3, q0=2 * sp.q0, qdot0=2 * sp.qdot0)
print("drift:", {k: f"{v:.1e}" for k, v in a.drift_summary().items()})
print(f"ray difference after q -> 2q: {np.abs(a.ray() - b.ray()).max():.1e}")
print(f"q itself differs by up to {np.abs(a.q - b.q).max():.2f}")
ray = a.ray()
for i in range(0, len(a.t), 2000):
    print(f"t = {a.t[i]:5.1f}  ray = {ray[i, 1:].round(5)}")
