"""
Form factors and their scale norms
==================================

A flat coupling has infinite plain norm but a finite ||f||_-2.
"""
import math

import numpy as np

from gsbkit import field_model as fm

# 400 uniform modes on [-40, 40]; the analytic tail covers |k| > 40
model = fm.FieldModel.uniform(40.0, 400)
flat = fm.flat(model)
wqed = fm.wqed(model)

for f in (flat, wqed, fm.gaussian(model, 1.0)):
    row = []
    for s in (0.0, 1.0, 2.0):
        try:
            row.append(f"{fm.weighted_norm(f, s):12.9f}")
        except ValueError:
            row.append(f"{'inf':>12}")
    print(f"{f.label:10s}", *row)

print("flat, s=2 minus pi:", fm.weighted_norm(flat, 2.0) - math.pi)

# growth of I_n = int |f|^2 / (omega + n - 1)^2
cert = fm.growth_certificate(flat, 2.0, 64)
bound = math.pi / np.sqrt((cert.n - 1.0) ** 2 + 1.0)
print("fitted r =", cert.r, " C_f =", round(cert.C_f, 6))
for n in (1, 2, 4, 16, 64):
    print(f"n={n:3d}  I_n={cert.integrals[n - 1]:.6f}  pi/sqrt((n-1)^2+1)={bound[n - 1]:.6f}")

# a cutoff sequence approaches wqed in H_-1
seq = fm.make_cutoff_sequence(fm.wqed(fm.FieldModel.uniform(600.0, 12000)),
                              [5.0, 20.0, 80.0, 320.0])
print("||f^i - f||_-1:", np.round(seq.distances, 5))
