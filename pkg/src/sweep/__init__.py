"""Parallel epsilon sweeps"""
