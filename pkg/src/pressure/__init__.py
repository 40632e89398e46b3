"""Equation-of-state modules"""
