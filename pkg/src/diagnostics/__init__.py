"""Diagnostics and estimate checks"""
