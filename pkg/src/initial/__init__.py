"""Initial data construction"""
