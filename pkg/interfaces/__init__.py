# Command-line surface: experiment files, plots, the prox self-test.
