"""Nonlocal interaction, alignment and damping forces"""
