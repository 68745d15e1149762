"""Numerical toolkit for finite-uniton harmonic maps into real quadrics.

Modules: ``loops`` (Laurent loop arithmetic), ``liealg`` (orthogonal Lie
algebra setting), ``roots`` (canonical elements and gradings),
``potentials`` (nilpotent normalized potentials), ``dpw`` (exact Picard
integration), ``factor`` (Birkhoff and Iwasawa splittings), ``harmonic``
(extended frames and checks), ``willmore`` (closed-form surfaces) and
``cli``.
"""

__version__ = "0.1.0"
