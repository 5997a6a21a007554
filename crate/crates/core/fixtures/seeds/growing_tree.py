from common import *

import random

# concepts:
# growth, extension, lines

# description:
# Seeds sit on the bottom row of the grid. Each seed grows a trunk straight up
# to the top of the grid in its own color.

def main(input_grid):
    height, width = grid_size(input_grid)
    forest = copy_grid(input_grid)
    for col in range(width):
        seed = input_grid[height - 1][col]
        if seed != BLACK:
            for row in range(height):
                forest[row][col] = seed
    return forest

def generate_input():
    height, width = random.randint(4, 10), random.randint(4, 10)
    soil = new_grid(height, width)
    for col in random.sample(range(width), random.randint(1, width // 2)):
        soil[height - 1][col] = random.choice(NOT_BLACK)
    return soil
