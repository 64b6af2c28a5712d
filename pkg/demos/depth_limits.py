"""How diagonal geodesics and the scaled metric behave as depth grows.

    python3 demos/depth_limits.py
"""
import numpy as np

from dlngeo import balanced as bal
from dlngeo import dln


def main():
    a, b, t = np.diag([1.0, 2.0]), np.diag([3.0, 5.0]), 0.3
    limit = bal.infinite_depth_geodesic(a, b, t)
    p, z = np.diag([1.0, 3.0]), np.diag([2.0, 6.0])
    target = bal.trace_metric_norm(p, z)
    print(f"trace-metric value {target:.6f}\n")
    print("    N   ||X_N(0.3) - A^0.7 B^0.3||   scaled g^N(z, z)   N * gap")
    for n in (2, 4, 8, 16, 32, 64, 256, 1024):
        dev = np.linalg.norm(bal.diagonal_geodesic(n, a, b, t) - limit)
        g = dln.gn_inner_scaled(n, p, z, z)
        print(f"  {n:4d}   {dev:26.3e}   {g:16.6f}   {n * (g - target):8.4f}")
    # Both gaps shrink like 1/N; the last column settles to a constant.


if __name__ == "__main__":
    main()
