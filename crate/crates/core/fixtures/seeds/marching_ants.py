from common import *

import random

# concepts:
# translation, wrapping, periodic motion

# description:
# A line of ants walks to the right along their row. Every ant moves one cell
# right, and ants leaving the right edge reappear on the left.

def main(input_grid):
    return [row[-1:] + row[:-1] for row in input_grid]

def generate_input():
    height, width = random.randint(2, 8), random.randint(4, 12)
    trail = new_grid(height, width)
    for row in range(height):
        for col in random.sample(range(width), random.randint(1, width - 1)):
            trail[row][col] = random.choice([MAROON, ORANGE])
    return trail
