"""Hilbert-space states and factorization analysis"""