# Settings and benchmark grids.
