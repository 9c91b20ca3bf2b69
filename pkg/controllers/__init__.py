# Initialize controllers package
