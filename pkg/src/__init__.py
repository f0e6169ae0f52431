"""Two-atom delayed-choice eraser simulator."""
