# Initialize schemas package
