"""Which dilation schedules leave holes in the receptive field?"""

from sdrnet.dilation import (
    DilationSchedule,
    check_gridding,
    footprint,
    footprint_2d_bruteforce,
    render_ascii,
    search_schedules,
)

# the schedule used inside the dilated residual block
good = DilationSchedule((1, 2, 5))
print(check_gridding(good).as_text())
print(render_ascii(footprint(good)))
print()

# rates with a common factor skip every other input pixel
bad = DilationSchedule((2, 4, 8))
print(check_gridding(bad).as_text())
grid = footprint(bad)
print(f"{grid.unhit} of {grid.size} pixels inside the footprint are never seen")
print(render_ascii(footprint(DilationSchedule((2, 2)))))
print()

# the 2-D footprint is the outer product of the 1-D one; check on a small case
small = DilationSchedule((1, 3))
assert (footprint(small).hits == footprint_2d_bruteforce(small).hits).all()

# hole-free three-layer schedules with rates up to 9, largest receptive field first
for s in search_schedules(depth=3, max_rate=9)[:5]:
    r = check_gridding(s)
    print(s.rates, "receptive field", r.receptive_field)
