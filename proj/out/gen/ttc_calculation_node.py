import rclpy
from rclpy.node import Node
from sensor_msgs.msg import LaserScan
from carla_msgs.msg import CarlaEgoVehicleStatus
from std_msgs.msg import Float32
from TTC_Calculation.TTC_Calculation import TTC_Calculation


class TTC_Calculation_node(Node):

    def __init__(self):
        super().__init__('TTC_Calculation_node')
        self.TTC_Calculation = TTC_Calculation()
        self.scan = None
        self.vehicle_status = None
        self.scan_subscriber = self.create_subscription(LaserScan, "/scan", self.scan_callback, qos_profile=10)
        self.vehicle_status_subscriber = self.create_subscription(CarlaEgoVehicleStatus, "/carla/ego_vehicle/vehicle_status", self.vehicle_status_callback, qos_profile=10)
        self.ttc_publisher = self.create_publisher(Float32, "/ttc", qos_profile=10)
        self.timer = self.create_timer(1.0/20.0, self.execute)

    def scan_callback(self, data):
        self.scan = data.range_min

    def vehicle_status_callback(self, data):
        self.vehicle_status = data.velocity

    def execute(self):
        if self.scan is None:
            self.get_logger().warn("msg not received")
            return
        if self.vehicle_status is None:
            self.get_logger().warn("msg not received")
            return
        output = self.TTC_Calculation.execute(scan=self.scan, vehicle_status=self.vehicle_status)
        ttc_msg = Float32()
        ttc_msg.data = output['ttc']
        self.ttc_publisher.publish(ttc_msg)


def main(args=None):
    rclpy.init(args=args)
    node = TTC_Calculation_node()
    rclpy.spin(node)
    node.destroy_node()
    rclpy.shutdown()


if __name__ == '__main__':
    main()
