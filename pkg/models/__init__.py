"""Wave forms, Stokes seeds, solvers and branch continuation."""
