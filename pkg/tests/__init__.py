"""
Test suite for the beta-plane vorticity lab
"""
