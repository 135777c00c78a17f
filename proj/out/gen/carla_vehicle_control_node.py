import rclpy
from rclpy.node import Node
from std_msgs.msg import Float32
from carla_msgs.msg import CarlaEgoVehicleControl
from Carla_Vehicle_Control.Carla_Vehicle_Control import Carla_Vehicle_Control


class Carla_Vehicle_Control_node(Node):

    def __init__(self):
        super().__init__('Carla_Vehicle_Control_node')
        self.Carla_Vehicle_Control = Carla_Vehicle_Control()
        self.brake_cmd = None
        self.brake_cmd_subscriber = self.create_subscription(Float32, "/brake_cmd", self.brake_cmd_callback, qos_profile=10)
        self.control_cmd_publisher = self.create_publisher(CarlaEgoVehicleControl, "/carla/ego_vehicle/vehicle_control_cmd", qos_profile=10)
        self.timer = self.create_timer(1.0/20.0, self.execute)

    def brake_cmd_callback(self, data):
        self.brake_cmd = data.data

    def execute(self):
        if self.brake_cmd is None:
            self.get_logger().warn("msg not received")
            return
        output = self.Carla_Vehicle_Control.execute(brake_cmd=self.brake_cmd)
        control_cmd_msg = CarlaEgoVehicleControl()
        control_cmd_msg.brake = output['control_cmd']
        self.control_cmd_publisher.publish(control_cmd_msg)


def main(args=None):
    rclpy.init(args=args)
    node = Carla_Vehicle_Control_node()
    rclpy.spin(node)
    node.destroy_node()
    rclpy.shutdown()


if __name__ == '__main__':
    main()
