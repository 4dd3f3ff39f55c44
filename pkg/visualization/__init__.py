"""
Figures et tableaux des résultats du codec
"""
