from common import *

import random

# concepts:
# gravity, falling, accumulation

# description:
# Grains of colored sand are scattered in the sky. Each grain falls straight
# down until it lands on the floor or on another grain, so the output shows
# the grains piled at the bottom of each column.

def main(input_grid):
    height, width = grid_size(input_grid)
    settled = new_grid(height, width)
    for col in range(width):
        grains = [input_grid[row][col] for row in range(height) if input_grid[row][col] != BLACK]
        for depth, grain in enumerate(reversed(grains)):
            settled[height - 1 - depth][col] = grain
    return settled

def generate_input():
    height, width = random.randint(5, 12), random.randint(5, 12)
    sky = new_grid(height, width)
    for _ in range(random.randint(3, height * width // 3)):
        sky[random.randrange(height)][random.randrange(width)] = random.choice(NOT_BLACK)
    return sky
