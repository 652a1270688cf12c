"""probmu - Probabilistic Bisimulation and Modal Mu-Calculus Toolkit"""

__version__ = "0.1.0"
__author__ = "probmu Team"
__description__ = "Probabilistic (bi)simulations, characteristic formulae and pMu model checking for pLTSs"
