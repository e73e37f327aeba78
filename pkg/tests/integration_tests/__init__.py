# The MIT License (MIT)
# Copyright © 2024 patrolbench developers
