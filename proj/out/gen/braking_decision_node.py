import rclpy
from rclpy.node import Node
from std_msgs.msg import Float32
from std_msgs.msg import Float32
from Braking_Decision.Braking_Decision import Braking_Decision


class Braking_Decision_node(Node):

    def __init__(self):
        super().__init__('Braking_Decision_node')
        self.Braking_Decision = Braking_Decision()
        self.ttc = None
        self.ttc_subscriber = self.create_subscription(Float32, "/ttc", self.ttc_callback, qos_profile=10)
        self.brake_cmd_publisher = self.create_publisher(Float32, "/brake_cmd", qos_profile=10)
        self.timer = self.create_timer(1.0/20.0, self.execute)

    def ttc_callback(self, data):
        self.ttc = data.data

    def execute(self):
        if self.ttc is None:
            self.get_logger().warn("msg not received")
            return
        output = self.Braking_Decision.execute(ttc=self.ttc)
        brake_cmd_msg = Float32()
        brake_cmd_msg.data = output['brake_cmd']
        self.brake_cmd_publisher.publish(brake_cmd_msg)


def main(args=None):
    rclpy.init(args=args)
    node = Braking_Decision_node()
    rclpy.spin(node)
    node.destroy_node()
    rclpy.shutdown()


if __name__ == '__main__':
    main()
