"""Arithmetic, sector sums and Mirsky constants over the nine imaginary quadratic
fields whose ring of integers is principal."""
