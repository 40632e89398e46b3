"""Entropy and entropy-flux pairs"""
