"""Numerical core of the VAE/NMF speech enhancement toolkit."""
