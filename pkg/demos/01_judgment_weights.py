"""
Judgment matrices and AHP weights
=================================

Walk through one pairwise comparison matrix, its principal eigenvector
and consistency ratio, then print the weights of all 48 sweep projects.
"""

import numpy as np

from floodrisk.ahp import CRITERIA, JudgmentMatrix, build_matrix, get_project, principal_eigen, weights_table

# project 1 compares Slope to Elevation as 4, Slope to streams as 1/2
# and Elevation to streams as 1/3
prj = get_project(1)
matrix = build_matrix(prj)
np.set_printoptions(precision=3, suppress=True)
print(matrix.entries)

# power iteration gives the weights, lambda_max and the consistency ratio
result = principal_eigen(matrix)
for name, w in zip(CRITERIA, result.weights):
    print(f"{name:12s} {w:.3f}")
print(f"lambda_max {result.lambda_max:.3f}  CI {result.ci:.4f}  CR {result.cr:.4f}")

# a consistent matrix built from known weights returns them unchanged
w = np.array([0.4, 0.3, 0.2, 0.05, 0.05])
print(principal_eigen(JudgmentMatrix.from_weights(w)).weights)

# the whole sweep: streams always outweigh slope, which outweighs elevation
table = weights_table()
W = np.array([r.weights for _, r in table])
print("weight ranges over 48 projects")
for name, lo, hi in zip(CRITERIA, W.min(axis=0), W.max(axis=0)):
    print(f"{name:12s} {lo:.3f} - {hi:.3f}")
print("max CR", max(r.cr for _, r in table))
