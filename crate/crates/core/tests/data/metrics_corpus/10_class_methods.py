class Sprite:
    def __init__(self, bitmap, x=0, y=0):
        self.bitmap = bitmap
        self.x, self.y = x, y

    def move(self, dx, dy, width, height):
        self.x = (self.x + dx) % width
        self.y = (self.y + dy) % height

    def cells(self):
        return [(self.y + r, self.x + c) for r, row in enumerate(self.bitmap)
                for c, v in enumerate(row) if v is not None and v != 0]
