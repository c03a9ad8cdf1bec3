"""Regenerates the banana fixture: y_i ~ N(theta1 + theta2^2, sigma_y^2)."""
import numpy as np

rng = np.random.default_rng(0)
theta1, theta2 = 0.5, np.sqrt(0.5)
sigma_y = np.sqrt(2.0)
y = theta1 + theta2**2 + sigma_y * rng.standard_normal(100)

with open("banana_y.csv", "w") as f:
    f.write("y\n")
    for v in y:
        f.write(repr(float(v)) + "\n")

with open("../src/banana_data.inc", "w") as f:
    f.write("// Generated by data/generate_banana.py; do not edit.\n")
    for v in y:
        f.write(repr(float(v)) + ",\n")
