# Initialize gridcontext package
