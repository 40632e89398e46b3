"""Test suite for the nonlocal NS lab"""
