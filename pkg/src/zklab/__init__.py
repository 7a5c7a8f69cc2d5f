"""Pseudospectral laboratory for the 3D L2-critical generalized Zakharov-Kuznetsov equation."""
