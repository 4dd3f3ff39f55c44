"""
Modules du codec vidéo sans perte à lifting temporel adaptatif
"""
