"""Grid helpers shared by seed and generated programs.

Grids are lists of rows of integer colors 0-9; 0 is the background.
"""

import random

BLACK, BLUE, RED, GREEN, YELLOW, GREY, PINK, ORANGE, TEAL, MAROON = range(10)
NOT_BLACK = [BLUE, RED, GREEN, YELLOW, GREY, PINK, ORANGE, TEAL, MAROON]


def new_grid(height, width, color=BLACK):
    return [[color] * width for _ in range(height)]


def copy_grid(grid):
    return [list(row) for row in grid]


def grid_size(grid):
    return len(grid), len(grid[0])


def rotate_cw(grid):
    return [list(row) for row in zip(*grid[::-1])]


def flip_horizontal(grid):
    return [row[::-1] for row in grid]


def flip_vertical(grid):
    return [list(row) for row in grid[::-1]]


def draw_rect(grid, top, left, height, width, color):
    for r in range(top, min(top + height, len(grid))):
        for c in range(left, min(left + width, len(grid[0]))):
            grid[r][c] = color
    return grid


def blit(grid, sprite, top, left, background=BLACK):
    """Copies the non-background cells of `sprite` onto `grid` in place."""
    for r, row in enumerate(sprite):
        for c, color in enumerate(row):
            rr, cc = top + r, left + c
            if color != background and 0 <= rr < len(grid) and 0 <= cc < len(grid[0]):
                grid[rr][cc] = color
    return grid


def colors_in(grid):
    return sorted({color for row in grid for color in row})


def random_sprite(height, width, color, density=2):
    """A connected-looking blob: each cell is set with probability density/3."""
    sprite = new_grid(height, width)
    for r in range(height):
        for c in range(width):
            if random.randint(1, 3) <= density:
                sprite[r][c] = color
    sprite[height // 2][width // 2] = color
    return sprite
