class Braking_Decision:
    """Maps Time-To-Collision onto a normalized brake force."""

    def execute(self, ttc):
        if ttc < 1.0:
            brake_cmd = 1.0
        elif ttc < 2.0:
            brake_cmd = (2.0 - ttc) / 1.0
        else:
            brake_cmd = 0.0
        return {'brake_cmd': brake_cmd}
