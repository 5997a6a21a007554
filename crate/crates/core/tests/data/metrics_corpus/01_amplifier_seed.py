def generate_amplifier_bitmap(width=9, height=8, body_color=1, knob_color=2, speaker_color=0, border_color=0):
    
    # width: Number of horizontal pixels (minimum 3, maximum 30)
    # height: Number of vertical pixels (minimum 3, maximum 30)
    # body_color: Amplifier body color (values from 0 to 9)
    # knob_color: Knob color (values from 0 to 9)
    # speaker_color: Speaker area color (values from 0 to 9)
    # border_color: Border color (values from 0 to 9)
    
    width = max(3, min(30, width))
    height = max(3, min(30, height))
    bitmap = [[speaker_color for _ in range(width)] for _ in range(height)]
    # Draw border
    for x in range(width):
        bitmap[0][x] = border_color
        bitmap[height-1][x] = border_color
    for y in range(height):
        bitmap[y][0] = border_color
        bitmap[y][width-1] = border_color
    # Draw body (main amp area)
    for y in range(1, height-2):
        for x in range(1, width-1):
            bitmap[y][x] = body_color
    # Draw knobs (top row, spaced)
    knob_count = max(2, width//4)
    for i in range(knob_count):
        x = 1 + i * ((width-2)//(knob_count-1)) if knob_count>1 else width//2
        bitmap[1][x] = knob_color
    # Draw speaker (bottom row, center)
    speaker_width = max(1, width//5)
    speaker_start = (width - speaker_width)//2
    for x in range(speaker_start, speaker_start+speaker_width):
        bitmap[height-2][x] = speaker_color
    return bitmap
