"""Hyperball volumes on complex Grassmann manifolds and MU-MIMO SINR prediction."""
__version__ = "0.1.0"
