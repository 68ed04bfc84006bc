"""
Besicovitch covering, mass concentration and ratio ergodic averages on Z^d,
with exact rational arithmetic.
"""
