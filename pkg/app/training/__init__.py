"""Loss functions and the toy embedding trainer."""
