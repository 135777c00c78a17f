class TTC_Calculation:
    """Computes the shortest Time-To-Collision from obstacle distance and ego speed."""

    def execute(self, scan, vehicle_status):
        distance = float(scan)
        relative_speed = float(vehicle_status)
        if relative_speed <= 0.0:
            ttc = float('inf')
        else:
            ttc = distance / relative_speed
        return {'ttc': ttc}
