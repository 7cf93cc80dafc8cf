"""nof1engine: uncertainty-triggered N-of-1 trials on top of population priors.

Population priors rank intervention candidates per patient; when no candidate
is a confident winner, an individually randomized crossover trial is
triggered, Bayesian updating fuses the prior with the patient's own data, and
a privacy layer (DP release + secure aggregation) feeds anonymized effect
estimates back into the population prior. A simulation harness quantifies
when the hybrid policy beats acting on the prior alone.
"""

__version__ = "0.1.0"
