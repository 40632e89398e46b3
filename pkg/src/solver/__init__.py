"""Lagrangian time integration"""
