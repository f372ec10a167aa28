# Solver library: prox operators, smoothing, problem components, the iterations and their diagnostics.
