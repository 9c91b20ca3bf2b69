# Initialize solvers package
