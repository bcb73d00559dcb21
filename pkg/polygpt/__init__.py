"""
polygpt: CHSH bounds for polygon GPT systems and the adaptive CHSH game.
"""
__version__ = "0.3.1"
