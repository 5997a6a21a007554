from common import *
import numpy as np

# concepts:
# gravity, falling, stacking

# description:
# In the input you will see colored pixels floating in a black grid.
# To make the output, let every pixel fall straight down until it rests on the bottom or on another pixel.

def main(input_grid):
    height, width = input_grid.shape
    output_grid = np.zeros_like(input_grid)
    for x in range(width):
        column = [c for c in input_grid[:, x] if c != Color.BLACK]
        for i, color in enumerate(reversed(column)):
            output_grid[height - 1 - i, x] = color
    return output_grid

def generate_input():
    width, height = np.random.randint(3, 10), np.random.randint(3, 10)
    grid = np.zeros((width, height), dtype=int)
    for _ in range(np.random.randint(1, width * height // 2)):
        grid[np.random.randint(width), np.random.randint(height)] = np.random.randint(1, 10)
    return grid
