"""hullcert - complexity of convex hulls, fixed-point rates and ERM certificates."""
