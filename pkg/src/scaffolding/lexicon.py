"""Fixed word lists for the travel-log track."""

DIRECTIONS = ("north", "south", "east", "west")

# (dx, dy) with x growing east and y growing north
OFFSETS = {"north": (0, 1), "south": (0, -1), "east": (1, 0), "west": (-1, 0)}
OPPOSITE = {"north": "south", "south": "north", "east": "west", "west": "east"}

# A world with n attractions uses the first n labels, so the action space of
# an n-attraction dataset is fixed: these labels plus the four directions.
ATTRACTIONS = (
    "museum", "school", "park", "coffee-shop", "library",
    "train-station", "restaurant", "parliament", "hospital", "bank",
    "cinema", "stadium", "zoo", "bakery", "church",
    "pharmacy", "theater", "aquarium", "market", "bridge",
    "castle", "fountain", "harbor", "hotel", "post-office",
    "gallery", "tower", "university", "airport", "mall",
    "gym", "pool", "temple", "cathedral", "palace",
    "garden", "farm", "factory", "warehouse", "prison",
    "courthouse", "embassy", "observatory", "arena", "casino",
    "pub", "cafe", "diner", "bookstore", "florist",
    "barber", "laundromat", "supermarket", "pier", "lighthouse",
    "monument", "statue", "plaza", "terminal", "dock",
    "marina", "cemetery", "opera-house", "concert-hall", "city-hall",
    "fire-station", "police-station", "bus-stop", "gas-station", "car-wash",
    "ice-rink", "skate-park", "golf-course", "bowling-alley", "night-club",
    "ferris-wheel", "art-school", "dance-hall", "tea-house", "flower-market",
    "toy-store",
)

MULTIWORD = tuple(a for a in ATTRACTIONS if "-" in a)

# Function words dropped on the travel-log track.  Kept deliberately small:
# "on", "my" and "of" carry the spatial relation and stay in.
STOP_WORDS = frozenset(
    {"the", "a", "an", "is", "am", "are", "was", "to", "again", "just", "very", "there"}
)
