"""Instance generators and the command-line front end."""
