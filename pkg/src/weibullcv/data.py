"""Bundled example dataset.

Survival of 112 plasma cell myeloma patients monitored at nine inspection
times (months); failures are deaths within each interval and withdrawals
are patients who left the study at an inspection time.
"""

from .censoring import CensoredSample

__all__ = ["plasma_cell_myeloma"]


def plasma_cell_myeloma() -> CensoredSample:
    """The myeloma follow-up data as a censored sample (n = 112)."""
    return CensoredSample(
        boundaries=(5.5, 10.5, 15.5, 20.5, 25.5, 30.5, 40.5, 50.5, 60.5),
        failures=(18, 16, 18, 10, 11, 8, 13, 4, 1),
        withdrawals=(1, 1, 3, 0, 0, 1, 2, 3, 2),
        n=112,
    )
