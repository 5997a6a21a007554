from common import *

import random

# concepts:
# reflection, symmetry

# description:
# A landscape stands above a calm lake that fills the lower half of the grid.
# The lake reflects the landscape, so the output copies the upper half upside
# down into the lower half.

def main(input_grid):
    height, width = grid_size(input_grid)
    scene = copy_grid(input_grid)
    for row in range(height // 2):
        scene[height - 1 - row] = list(input_grid[row])
    return scene

def generate_input():
    height, width = 2 * random.randint(3, 7), random.randint(4, 12)
    scene = new_grid(height, width)
    for col in range(width):
        peak = random.randint(0, height // 2 - 1)
        for row in range(peak, height // 2):
            scene[row][col] = GREEN
    return scene
